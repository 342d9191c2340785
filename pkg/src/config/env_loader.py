"""
Environment variable loader for the DHT cache library.
Loads variables from the environment file and makes them available to the application.
"""
import os
from dotenv import load_dotenv

ENV_PREFIX = 'DHT_'


def load_environment(env_file="dht.env"):
    """
    Load environment variables from file, overriding OS settings.

    Args:
        env_file (str): Path to the environment file, relative to the repository root

    Returns:
        dict: Dictionary of loaded DHT_* environment variables
    """
    # Get the absolute path to the environment file
    base_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    env_path = os.path.join(base_dir, env_file)

    # A missing file is fine: defaults in settings.py apply
    load_dotenv(env_path, override=True)

    return {key: value for key, value in os.environ.items() if key.startswith(ENV_PREFIX)}


def env_flag(env_vars, name, default='false'):
    """Interpret a DHT_* variable as a boolean flag."""
    return env_vars.get(name, default).strip().lower() in ('1', 'true', 'yes', 'on')
