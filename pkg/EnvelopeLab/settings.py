"""
Django settings for the EnvelopeLab project.

EnvelopeLab is a tabular reinforcement-learning laboratory: offline value envelopes
learned from batch trajectories, envelope-shaped online exploration, and the regret
experiments built on top of them. Django provides the command line (management
commands), the SVG chart templates, the run registry and the test runner.

Every value below that may differ between machines is read through python-decouple,
so it can be overridden from the environment or from a `.env` file next to manage.py.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# The lab never serves untrusted traffic; the default key only exists for local runs.
SECRET_KEY = config('SECRET_KEY', default='envelopelab-local-development-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1',
                       cast=lambda v: [h.strip() for h in v.split(',') if h.strip()])


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'lab',
    'rest_framework',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'EnvelopeLab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database
# The registry only indexes experiment outputs, SQLite is enough.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('DB_NAME', default=str(BASE_DIR / 'db.sqlite3')),
    }
}


LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework Configuration (read-only registry API)
REST_FRAMEWORK = {
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 100,
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
        'rest_framework.renderers.BrowsableAPIRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
}

# ============================================
# LAB CONFIGURATION
# ============================================
# Defaults used by the management commands when a flag is omitted.

LAB_OUTPUT_DIR = Path(config('LAB_OUTPUT_DIR', default=str(BASE_DIR / 'output')))
LAB_DEFAULT_DELTA = config('LAB_DEFAULT_DELTA', default=0.1, cast=float)
LAB_DEFAULT_SEED = config('LAB_DEFAULT_SEED', default=0, cast=int)
LAB_JOBS = config('LAB_JOBS', default=1, cast=int)
LAB_CHART_POINTS = config('LAB_CHART_POINTS', default=200, cast=int)  # per plotted curve
LAB_WRITE_TRACES = config('LAB_WRITE_TRACES', default=True, cast=bool)
LAB_LOG_LEVEL = config('LAB_LOG_LEVEL', default='INFO')

# ============================================
# LOGGING
# ============================================

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'lab': {
            'handlers': ['console'],
            'level': LAB_LOG_LEVEL,
            'propagate': False,
        },
    },
}
