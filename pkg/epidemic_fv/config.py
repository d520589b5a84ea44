import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    # Runs whose config and command line leave the output directory unset write
    # under this root, one sub-directory per config file.
    OUTPUT_ROOT: str = os.getenv("EPIDEMIC_FV_OUTPUT_ROOT") or "./output"

    LOG_LEVEL: str = (os.getenv("EPIDEMIC_FV_LOG_LEVEL") or "INFO").upper()

    PROJECT_NAME: str = os.getenv("PROJECT_NAME") or "Nonlocal Epidemic FV Solver"


settings = Settings()
