"""
Small helpers shared by the modules of the package.
"""
import hashlib
import os
from argparse import ArgumentTypeError


def get_base_directory():
    """
    Returns the repository root, the parent directory of the package, where
    assets/config lives.
    """
    current_directory = os.path.abspath(os.path.dirname(__file__))
    return os.path.abspath(os.path.join(current_directory, os.pardir))


def str2bool(v):
    """
    Converts a string argument to a boolean value.
    """
    if isinstance(v, bool):
        return v
    if v.lower() in ('yes', 'true', 't', 'y', '1'):
        return True
    if v.lower() in ('no', 'false', 'f', 'n', '0'):
        return False
    raise ArgumentTypeError('Boolean value expected.')


def derive_seed(master_seed, component):
    """
    Derives a sub-seed from the master seed and a component name.

    The derivation is a stable hash, so it does not depend on the Python
    process (unlike hash()).

    Args:
        master_seed (int): Master seed of the run.
        component (str): Name of the component asking for randomness.

    Returns:
        int: Seed in [0, 2**32).
    """
    digest = hashlib.sha256(f"{int(master_seed)}/{component}".encode("utf-8"))
    return int.from_bytes(digest.digest()[:4], "little")


def generate_output_path(output_dir, file_name):
    """
    Joins an output directory and a file name, creating the directory if needed.
    """
    os.makedirs(output_dir, exist_ok=True)
    return os.path.join(output_dir, file_name)
