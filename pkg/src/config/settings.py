"""
Central settings module for the DHT cache library.
Provides access to all configuration parameters with sensible defaults.
"""
from .env_loader import load_environment, env_flag

# Load environment variables
env_vars = load_environment()

# Table Configuration
KEY_SIZE = int(env_vars.get('DHT_KEY_SIZE', '80'))
VALUE_SIZE = int(env_vars.get('DHT_VALUE_SIZE', '104'))
PROTOCOL = env_vars.get('DHT_PROTOCOL', 'lockfree')
BUCKETS = int(env_vars.get('DHT_BUCKETS', '0'))  # 0: as many as fit the window
CHECKSUM_RETRIES = int(env_vars.get('DHT_CHECKSUM_RETRIES', '3'))

# Remote Memory Configuration
BACKEND = env_vars.get('DHT_BACKEND', 'threads')
PARTICIPANTS = int(env_vars.get('DHT_PARTICIPANTS', '4'))
WINDOW_SIZE = int(env_vars.get('DHT_WINDOW_SIZE', str(64 * 1024 * 1024)))
PUT_GRANULARITY = int(env_vars.get('DHT_PUT_GRANULARITY', '0'))
BACKOFF_MIN_US = float(env_vars.get('DHT_BACKOFF_MIN_US', '1'))
BACKOFF_MAX_US = float(env_vars.get('DHT_BACKOFF_MAX_US', '256'))
SOCKET_BACKOFF_MIN_US = float(env_vars.get('DHT_SOCKET_BACKOFF_MIN_US', '200'))
SOCKET_BACKOFF_MAX_US = float(env_vars.get('DHT_SOCKET_BACKOFF_MAX_US', '8192'))

# Sockets Backend Configuration
SOCKET_HOST = env_vars.get('DHT_SOCKET_HOST', '127.0.0.1')
SOCKET_TIMEOUT = float(env_vars.get('DHT_SOCKET_TIMEOUT', '30'))
BARRIER_TIMEOUT = float(env_vars.get('DHT_BARRIER_TIMEOUT', '600'))
RENDEZVOUS_TIMEOUT = float(env_vars.get('DHT_RENDEZVOUS_TIMEOUT', '60'))

# Workload Configuration
SEED = int(env_vars.get('DHT_SEED', '42'))
ZIPF_SKEW = float(env_vars.get('DHT_ZIPF_SKEW', '0.99'))
ZIPF_RANGE = int(env_vars.get('DHT_ZIPF_RANGE', '712500'))
WTR_COUNT = int(env_vars.get('DHT_WTR_COUNT', '100000'))
MIXED_OPS = int(env_vars.get('DHT_MIXED_OPS', '200000'))
READ_RATIO = float(env_vars.get('DHT_READ_RATIO', '0.95'))
REPEAT = int(env_vars.get('DHT_REPEAT', '1'))

# Surrogate Demo Configuration
GRID_WIDTH = int(env_vars.get('DHT_GRID_WIDTH', '4096'))
STEPS = int(env_vars.get('DHT_STEPS', '100'))
DIGITS = int(env_vars.get('DHT_DIGITS', '4'))
KERNEL_COST_US = float(env_vars.get('DHT_KERNEL_COST_US', '100'))

# Output Configuration
OUTPUT_FORMAT = env_vars.get('DHT_OUTPUT_FORMAT', 'text')  # text, json, csv

# Logging Configuration
DETAILED_LOGGING = env_flag(env_vars, 'DHT_DETAILED_LOGGING')
LOG_TO_FILE = env_flag(env_vars, 'DHT_LOG_TO_FILE')
LOG_LEVEL = env_vars.get('DHT_LOG_LEVEL', 'INFO')
