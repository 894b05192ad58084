import os
from dotenv import load_dotenv

# Load environment variables (BVS_BENCH__* overrides may live in .env)
load_dotenv()

# Get the project root directory (two levels up from src/bvs_bench/)
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))

# Define paths for the various components of the application
CONFIGS_PATH = os.path.join(PROJECT_ROOT, 'configs')
OUTPUT_PATH = os.path.join(PROJECT_ROOT, 'output')
OUTPUT_LOGS_PATH = os.path.join(OUTPUT_PATH, 'logs')

DEFAULT_CONFIG_FILE_PATH = os.path.join(CONFIGS_PATH, 'example_sweep.yaml')
LOG_FILE_PATH = os.path.join(OUTPUT_LOGS_PATH, 'bvs_bench.log')

# Environment override prefix: BVS_BENCH__SWEEP__RPM sets sweep.rpm
ENV_PREFIX = 'BVS_BENCH__'
ENV_SEPARATOR = '__'

# Layout of an output directory
REPORT_FILE_NAME = 'report.csv'
PERFORMANCE_FILE_NAME = 'performance.json'
RESOLVED_CONFIG_FILE_NAME = 'config.resolved.yaml'
DATA_DIRECTORY_NAME = 'data'
PLOTS_DIRECTORY_NAME = 'plots'
