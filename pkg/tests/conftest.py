"""Shared test configuration."""

from __future__ import annotations

import time

# Wall-clock origin for suite timing assertions; conftest is imported before
# any test module.
SESSION_START = time.perf_counter()
