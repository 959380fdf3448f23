"""
Django settings for the translate-frames project.

Every numerical default of the library lives in the FRAMES dict below and
can be overridden from the environment (or a .env file at the project root)
through django-environ.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env(
    DEBUG=(bool, False),
    FRAMES_LOG_LEVEL=(str, 'WARNING'),
    FRAMES_SEED=(int, 20240601),
    FRAMES_TRIALS=(int, 50),
    FRAMES_TOL=(float, 1e-6),
    FRAMES_EXHAUSTIVE_LIMIT=(int, 14),
    FRAMES_DENSE_LIMIT=(int, 4096),
    FRAMES_MAX_BLOCK_SIZE=(int, 10**6),
    FRAMES_MAX_TRANSLATES=(int, 4096),
    FRAMES_CAUCHY_INFLATION=(float, 1.1),
    FRAMES_SYNTHESIS_SLACK=(float, 1e-9),
    FRAMES_DEMO_GRID_H=(float, 2.0 ** -5),
    FRAMES_LAMBDA_LENGTH=(int, 10**6),
    FRAMES_RECORD_RUNS=(bool, False),
)

if (BASE_DIR / '.env').exists():
    environ.Env.read_env(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('SECRET_KEY', default='django-insecure-translate-frames-local-only')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'lp_grid',
    'haar_basis',
    'separation',
    'frames',
    'construction',
    'diagnostics',
    'experiments',
]


# Database
# Only the experiment run history is persisted.

DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Library defaults

FRAMES = {
    'SEED': env('FRAMES_SEED'),
    'TRIALS': env('FRAMES_TRIALS'),
    'TOL': env('FRAMES_TOL'),
    # Largest n for which sign vectors are swept exhaustively
    'EXHAUSTIVE_LIMIT': env('FRAMES_EXHAUSTIVE_LIMIT'),
    # Largest working-span dimension assembled densely
    'DENSE_LIMIT': env('FRAMES_DENSE_LIMIT'),
    'MAX_BLOCK_SIZE': env('FRAMES_MAX_BLOCK_SIZE'),
    'MAX_TRANSLATES': env('FRAMES_MAX_TRANSLATES'),
    'CAUCHY_INFLATION': env('FRAMES_CAUCHY_INFLATION'),
    'SYNTHESIS_SLACK': env('FRAMES_SYNTHESIS_SLACK'),
    'DEMO_GRID_H': env('FRAMES_DEMO_GRID_H'),
    'LAMBDA_LENGTH': env('FRAMES_LAMBDA_LENGTH'),
    'RECORD_RUNS': env('FRAMES_RECORD_RUNS'),
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': env('FRAMES_LOG_LEVEL'),
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}
