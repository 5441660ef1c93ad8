"""Collective-decay simulation of driven two-level atoms and the Werner states it steers into."""

from dotenv import load_dotenv

__version__ = "0.1.0"


def check_vars() -> None:
    # pylint: disable=import-outside-toplevel
    from pydantic import ValidationError

    from src.configs.settings import EngineSettings

    try:
        EngineSettings.from_env()
    except ValidationError as exc:
        raise RuntimeError(f"Invalid WERNER_* environment variables:\n{exc}") from exc


load_dotenv()
check_vars()
