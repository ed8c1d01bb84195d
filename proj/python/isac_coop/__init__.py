from isac_coop._core import *  # noqa: F401,F403
