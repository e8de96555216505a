"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting
``SUBSEP_PURE=1`` in the environment forces the pure-Python kernels.
Both backends implement the same functions with bit-identical output.
"""

import os

from . import pure

if os.environ.get("SUBSEP_PURE"):
    impl = pure
else:
    try:
        from . import _native as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pure

BACKEND = impl.BACKEND

reduce_letters = impl.reduce_letters
fold_edges = impl.fold_edges
core_trim = impl.core_trim
walk_graph = impl.walk_graph
complete_partial = impl.complete_partial
invert_perms = impl.invert_perms
walk_table = impl.walk_table
walk_table_many = impl.walk_table_many
intersect_perms = impl.intersect_perms
symmdiff_size = impl.symmdiff_size
