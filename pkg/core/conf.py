from typing import Any

from django.conf import settings


def frames_setting(name: str, value: Any = None) -> Any:
    """
    @atomic-function
    Resolve a library default: an explicit value wins, otherwise FRAMES[name]
    """
    if value is not None:
        return value
    return settings.FRAMES[name]
