import logging
import os


def get_logger(name: str = "hyperreal") -> logging.Logger:
    """Initializes and returns a logger for the application."""

    logger = logging.getLogger(name)

    level_name = os.getenv("HYPERREAL_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)
    logger.setLevel(level)

    # one handler per logger
    if not logger.handlers:
        # Create a console handler on stderr; stdout carries the JSON reports
        ch = logging.StreamHandler()
        ch.setLevel(level)

        # Create a formatter and set it for the handler
        formatter = logging.Formatter("%(asctime)s - %(message)s")
        ch.setFormatter(formatter)

        # Add the handler to the logger
        logger.addHandler(ch)
        logger.propagate = False

    return logger
