"""check-config: print the resolved configuration."""

import json

from ...utils.config import RunConfig


def cmd_check_config(config: RunConfig) -> int:
    print(json.dumps(config.resolved_dict(), indent=2, sort_keys=True))
    return 0
