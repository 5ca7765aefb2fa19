## Generic Parts
# These functions are providing the functionality to load
# arbitrary configuration files.
#
# The package defaults (`configuration.py`, `logging.py`) are always loaded.
# Every `*.py` file in the directory named by BATHSYNC_CONFIG_DIR is loaded
# on top of them, and wins over the defaults.

import importlib.util
import logging
import sys
from os import environ, scandir
from os.path import abspath, dirname, isdir, isfile

logger = logging.getLogger(__name__)


def _filename(f):
    return f.name


def _import(module_name, path, loaded_configurations):
    spec = importlib.util.spec_from_file_location(module_name, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    sys.modules[module_name] = module

    loaded_configurations.insert(0, module)

    logger.debug(f"🧬 loaded config '{path}'")


def read_configurations(config_module, config_dir, main_config, loaded_configurations=None, required=True):
    if loaded_configurations is None:
        loaded_configurations = []

    main_config_path = abspath(f"{config_dir}/{main_config}.py")
    if isfile(main_config_path):
        _import(f"{config_module}.{main_config}", main_config_path, loaded_configurations)
    elif required:
        logger.warning(f"⚠️ Main configuration '{main_config_path}' not found.")

    with scandir(config_dir) as it:
        for f in sorted(it, key=_filename):
            if not f.is_file():
                continue

            if f.name.startswith("__"):
                continue

            if not f.name.endswith(".py"):
                continue

            if f.name == f"{main_config}.py":
                continue

            module_name = f"{config_module}.{f.name[:-len('.py')]}".replace(".", "_")
            _import(module_name, f.path, loaded_configurations)

    if required and len(loaded_configurations) == 0:
        raise ImportError(f"No configuration files found in '{config_dir}'.")

    return loaded_configurations


def load_settings(override_dir=None):
    loaded_configurations = read_configurations(
        config_module="bathsync.configuration",
        config_dir=dirname(abspath(__file__)),
        main_config="configuration",
    )

    if override_dir:
        if not isdir(override_dir):
            raise ImportError(f"Configuration directory '{override_dir}' does not exist.")
        read_configurations(
            config_module="bathsync.configuration.override",
            config_dir=override_dir,
            main_config="configuration",
            loaded_configurations=loaded_configurations,
            required=False,
        )

    return loaded_configurations


## Specific Parts
# This section's code actually loads the various configuration files
# into this module. Attribute lookups are resolved against the loaded
# modules, most recently loaded first, through `__getattr__`.


_loaded_configurations = load_settings(environ.get("BATHSYNC_CONFIG_DIR"))


def reload(override_dir=None):
    global _loaded_configurations
    _loaded_configurations = load_settings(override_dir)


def __getattr__(name):
    for config in _loaded_configurations:
        try:
            return getattr(config, name)
        except AttributeError:
            pass
    raise AttributeError(name)


def __dir__():
    names = []
    for config in _loaded_configurations:
        names.extend(config.__dir__())
    return names
