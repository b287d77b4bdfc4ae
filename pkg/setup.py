"""
Setup script of the auxcalib package. The name and version come from
auxcalib/__init__.py.
"""

import os
import re

from setuptools import find_packages, setup

SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))


def read_package_metadata():
    """
    Reads APP_NAME and __version__ from the package without importing it.
    """
    with open(os.path.join(SCRIPT_DIR, "auxcalib", "__init__.py"),
              encoding="utf-8") as init_file:
        content = init_file.read()
    fields = dict(
        re.findall(r'^(APP_NAME|__version__) = "([^"]+)"', content,
                   re.MULTILINE))
    return fields["APP_NAME"], fields["__version__"]


with open(os.path.join(SCRIPT_DIR, "requirements.txt"),
          encoding="utf-8") as requirements:
    REQUIREMENTS = [
        line.strip() for line in requirements
        if line.strip() and line.strip() != "pytest"
    ]

NAME, VERSION = read_package_metadata()

setup(
    name=NAME,
    version=VERSION,
    description=("Post-hoc confidence calibration of classifier logits with "
                 "an auxiliary misclassified class."),
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=REQUIREMENTS,
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["auxcalib=auxcalib.main:main"]},
)
