"""
Django settings for SubtypeLab project.

The project has no database and no web surface: it hosts the App package
(two-stage subtype classifier) and its management commands
(gen-synthetic, train, eval, predict).

Environment overrides (.env is loaded first):
    SUBTYPELAB_LOG_LEVEL    console/file log level (default INFO)
    SUBTYPELAB_LOGS_DIR     log directory (default <project>/logs)
    SUBTYPELAB_DEFAULT_T    default number of Monte-Carlo passes (default 50)
    SUBTYPELAB_OUTPUT_DIR   default output directory (default <project>/runs)
"""

import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("SECRET_KEY", "subtypelab-local")
DEBUG = os.getenv("DEBUG", "False") == "True"
ALLOWED_HOSTS = []

DATABASES = {}

# Application definition
INSTALLED_APPS = [
    "App",
]

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

# ============================================================================
# RUN DEFAULTS
# ============================================================================

# Hyperparameters: lr 1e-4, batch 32, L2 1e-6, 55 epochs for stage 1 and
# 75 for stage 2, rotation within (-90, 90) with both flips.
SUBTYPELAB_DEFAULTS = {
    "dataset": {
        "manifest": None,
        "synthetic": {
            "counts": {"Luminal": 200, "HER2": 60, "TN": 40},
            "size": [16, 16],
            "noise": 0.1,
        },
        "target_size": [32, 32],
        "train_fraction": 0.8,
        "grouping": "by_patient",
        "seed": 0,
    },
    "model": {
        "backbone": "default",
        "widths": [128, 128],
        "dropout": 0.5,
        "backbone_dropout": 0.0,
        "flat_baseline": True,
    },
    "training": {
        "lr": 1e-4,
        "batch_size": 32,
        "reg": 1e-6,
        "l2_scope": "classifier",
        "epochs": {"stage1": 55, "stage2": 75},
        "seed": 0,
    },
    "augment": {
        "enabled": True,
        "rotation_range": [-90.0, 90.0],
        "horizontal_flip": True,
        "vertical_flip": True,
    },
    "rebalance": {
        "methods": {"TN": "adasyn", "Luminal": "none", "HER2": "random"},
        "k": 5,
    },
    "inference": {
        "T": int(os.getenv("SUBTYPELAB_DEFAULT_T", "50")),
        "mode": "soft",
        "seed": 0,
    },
    "output": {
        "directory": os.getenv("SUBTYPELAB_OUTPUT_DIR", str(BASE_DIR / "runs")),
    },
}

# ============================================================================
# LOGGING CONFIGURATION
# ============================================================================
LOG_LEVEL = os.getenv("SUBTYPELAB_LOG_LEVEL", "INFO").upper()
LOGS_DIR = os.getenv("SUBTYPELAB_LOGS_DIR", os.path.join(BASE_DIR, "logs"))
if not os.path.exists(LOGS_DIR):
    os.makedirs(LOGS_DIR)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
            "level": LOG_LEVEL,
        },
        "file": {
            "class": "logging.handlers.RotatingFileHandler",
            "filename": os.path.join(LOGS_DIR, "subtypelab.log"),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "formatter": "verbose",
            "level": LOG_LEVEL,
        },
        "error_file": {
            "class": "logging.handlers.RotatingFileHandler",
            "filename": os.path.join(LOGS_DIR, "errors.log"),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "formatter": "verbose",
            "level": "ERROR",
        },
    },
    "loggers": {
        "App": {
            "handlers": ["console", "file", "error_file"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
        # Root logger (catches everything else)
        "": {
            "handlers": ["console"],
            "level": "WARNING",
        },
    },
}
