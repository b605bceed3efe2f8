NUM_CLASSES = 4

# Padding defaults used for the published Twitter15/Twitter16 setup.
DEFAULT_MAX_RESPONSES = 100
DEFAULT_MAX_TOKENS = 35
DEFAULT_MAX_OBJECTS = 36

DEFAULT_FOLDS = 5
DEFAULT_EPOCHS = 50
DEFAULT_LEARNING_RATE = 5e-5
DEFAULT_BATCH_SIZE = 4
DEFAULT_VALIDATION_FRACTION = 0.1

DATASET_TOP_K = {"twitter15": 5, "twitter16": 10, "custom": 5}

CLS_TOKEN = "[CLS]"
PAD_TOKEN = "[PAD]"
RETWEET_MARKER = "RT @"

# Floor applied before taking the log of a mixed probability.
PROBABILITY_FLOOR = 1e-12

CACHE_SUFFIX = ".fcache"
CHECKPOINT_MAGIC = b"FORMCKPT"

THREADS_FILE = "threads.jsonl"
FOLDS_FILE = "folds.json"
SIGNALS_FILE = "signals.json"
CONFIG_ECHO_FILE = "config.json"

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2
EXIT_IO_ERROR = 3
EXIT_MISSING_DEPENDENCY = 4
