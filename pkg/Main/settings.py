"""
Django settings for the proxsplit project.

The project hosts a proximal splitting library (Operators, Proximity,
Splitting, oracle apps) and the experiment runner (Experiments app) that
is driven through ``python manage.py proxsplit``.
"""

from pathlib import Path
from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='proxsplit-local-development-key')

# DEBUG also turns on the per-call identity checks of the prox catalog.
DEBUG = config('DEBUG', cast=bool, default=False)

ALLOWED_HOSTS = []


# ============================================================
#   APPLICATION DEFINITION
# ============================================================

INSTALLED_APPS = [
    'Operators',
    'Proximity',
    'Splitting',
    'Experiments',
    'oracle',
]


# ============================================================
#   DATABASE
# ============================================================

DATABASES = {
    'default': dj_database_url.parse(
        config('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")
    )
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# ============================================================
#   INTERNATIONALIZATION & TIME
# ============================================================

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# ============================================================
#   SOLVER & EXPERIMENT DEFAULTS
# ============================================================

# Threads used for the m prox evaluations of one PPXA iteration.
PROXSPLIT_MAX_WORKERS = config('PROXSPLIT_MAX_WORKERS', cast=int, default=1)

# Tolerance of the membership tests behind indicator objectives.
PROXSPLIT_MEMBERSHIP_TOL = config('PROXSPLIT_MEMBERSHIP_TOL', cast=float, default=1e-9)

# Random pairs drawn by the adjoint consistency checks.
PROXSPLIT_ADJOINT_PROBES = config('PROXSPLIT_ADJOINT_PROBES', cast=int, default=100)

# tqdm progress bar in the proxsplit command.
PROXSPLIT_PROGRESS = config('PROXSPLIT_PROGRESS', cast=bool, default=True)


# ============================================================
# LOGGING CONFIGURATION
# ============================================================
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': config('LOG_LEVEL', default='INFO'),
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}
