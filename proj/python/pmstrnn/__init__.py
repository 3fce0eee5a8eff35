from ._pmstrnn import *  # noqa: F401,F403
