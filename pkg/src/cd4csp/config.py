"""Budget knobs, overridable through environment variables.

Only budgets live here; anything affecting the semantics of results is a
function argument.  All defaults are sized for universes of at most 8
elements, which is where every exhaustive check in this package operates.
"""

from __future__ import annotations

import os


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise SystemExit(f"{name} must be positive, got {value}")
    return value


#: Largest universe for which congruence lattices are enumerated.
CONGRUENCE_ENUM_BOUND = _env_int("CD4CSP_ENUM_BOUND", 8)

#: Cap on |B| ** |A| for the exhaustive homomorphism search.
BRUTE_FORCE_BUDGET = _env_int("CD4CSP_BF_BUDGET", 10_000_000)

#: How many size-3 algebras the systematic enumerator emits by default.
SIZE3_ENUM_BUDGET = _env_int("CD4CSP_SIZE3_BUDGET", 300)

#: How many size-4 algebras the sampling enumerator emits by default.
SIZE4_SAMPLE_BUDGET = _env_int("CD4CSP_SIZE4_BUDGET", 500)

#: Size-3 pool used by the lemma suite (kept smaller: the suite is
#: quadratic in the pool).
LEMMA_SIZE3_POOL = _env_int("CD4CSP_LEMMA_SIZE3_POOL", 24)

#: Chunk bound for the dense closure kernel: at most this many result
#: cells are materialized per numpy pass.
CLOSURE_CELL_LIMIT = 4_000_000

#: Cap on the number of index sets a strategy table may hold.
STRATEGY_TABLE_LIMIT = _env_int("CD4CSP_STRATEGY_LIMIT", 200_000)
