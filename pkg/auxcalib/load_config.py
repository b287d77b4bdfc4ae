"""
This module loads the run configuration: the shipped default file, overlaid
by an optional user file (or the config embedded in a run manifest),
validating each field and replacing corrupted or missing fields with default
values.
"""
import copy
import json
import logging
import os

from jsonschema import ValidationError, validate

from auxcalib.default_scheme_config import CONFIG_SCHEMA, DEFAULT_CONFIG_CONTENT
from auxcalib.errors import ConfigError
from auxcalib.utils import get_base_directory

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "config_default.json"


def default_config_path(file_name=DEFAULT_CONFIG_FILE):
    return os.path.join(get_base_directory(), "assets", "config", file_name)


class LoadConfig:
    """
    This class loads the default configuration and an optional user
    configuration from JSON files, validating each field and replacing
    corrupted or missing fields with default values.

    Attributes:
        config (dict): The resolved, schema-valid configuration.
        warnings (list): One message per repaired or dropped field.
    """

    def __init__(self, config_file=None, default_config_file=None):
        self.default_config_file = default_config_file or default_config_path()
        self.config_file = config_file
        self.warnings = []
        self.config = self.load_and_fix_config()

    def _warn(self, message):
        logger.warning(message)
        self.warnings.append(message)

    def validate_config_field(self, key, value):
        """
        Validates a single configuration field against its schema.

        Returns:
            bool: True if valid, False otherwise.
        """
        field_schema = CONFIG_SCHEMA["properties"].get(key)
        if not field_schema:
            return False
        try:
            validate(instance=value, schema=field_schema)
            return True
        except ValidationError as e:
            logger.debug("Validation failed for key '%s': %s", key, e.message)
            return False

    def validate_config(self, config):
        try:
            validate(instance=config, schema=CONFIG_SCHEMA)
            return True
        except ValidationError as e:
            logger.debug("Configuration validation failed: %s", e.message)
            return False

    def read_default_config(self):
        """
        The shipped defaults, or the built-in ones when the file is missing
        or not valid JSON.
        """
        path = self.default_config_file
        if os.path.exists(path):
            try:
                with open(path, "r", encoding="utf-8") as file:
                    config = json.load(file)
                logger.debug("Loaded default configuration from %s.", path)
                return config
            except json.JSONDecodeError:
                logger.warning("Default config file %s is not valid JSON.",
                               path)
        logger.debug("Using built-in default configuration.")
        return copy.deepcopy(DEFAULT_CONFIG_CONTENT)

    def read_user_config(self):
        """
        The user file as a dict. A run manifest contributes its embedded
        "config" object.

        Raises:
            ConfigError: If the file is missing or not a JSON object.
        """
        path = self.config_file
        if not os.path.isfile(path):
            raise ConfigError(f"Config file {path} does not exist.")
        try:
            with open(path, "r", encoding="utf-8") as file:
                config = json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"Config file {path} is not valid JSON: {e.msg}") from e
        if not isinstance(config, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object.")
        if "command" in config and isinstance(config.get("config"), dict):
            logger.info("Replaying the configuration of manifest %s.", path)
            config = config["config"]
        logger.info("Loaded user configuration from %s.", path)
        return config

    def load_and_fix_config(self):
        """
        Loads the configuration files and fixes corrupted fields by replacing
        them with default values.

        Returns:
            dict: A valid configuration dictionary.
        """
        config = self.read_default_config()
        if not isinstance(config, dict):
            config = copy.deepcopy(DEFAULT_CONFIG_CONTENT)
        if self.config_file:
            config = {**config, **self.read_user_config()}
        if self.validate_config(config):
            return config
        return self.fix_corrupted_fields(config)

    def fix_corrupted_fields(self, config):
        """
        Fixes corrupted fields in a configuration by replacing them with
        defaults. Unknown keys are dropped.
        """
        fixed_config = copy.deepcopy(DEFAULT_CONFIG_CONTENT)
        for key in sorted(set(config) - set(DEFAULT_CONFIG_CONTENT)):
            self._warn(f"Unknown config key '{key}' ignored.")
        for key in DEFAULT_CONFIG_CONTENT:
            if key not in config:
                self._warn(f"Missing config key '{key}'; using the default.")
            elif self.validate_config_field(key, config[key]):
                fixed_config[key] = config[key]
            else:
                self._warn(f"Replaced invalid value for '{key}' with the "
                           "default.")
        return fixed_config

    def set_config_value(self, key, value):
        """
        Overrides one field after validating it.

        Raises:
            ConfigError: If the key is unknown or the value is invalid.
        """
        if key not in DEFAULT_CONFIG_CONTENT:
            raise ConfigError(f"Unknown config key '{key}'.")
        if not self.validate_config_field(key, value):
            raise ConfigError(f"Invalid value for '{key}': {value!r}.")
        self.config[key] = value

    def get_config(self):
        return self.config

    def __getitem__(self, key):
        return self.config.get(key)

    def __setitem__(self, key, value):
        self.set_config_value(key, value)
