from os import environ

# Set BATHSYNC_LOGLEVEL in the environment to override a logging level of INFO.
LOGLEVEL = environ.get('BATHSYNC_LOGLEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': LOGLEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'bathsync': {
            'handlers': ['console'],
            'level': LOGLEVEL,
            'propagate': False,
        },
    },
}
