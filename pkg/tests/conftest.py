import os

# Force the non-interactive backend before matplotlib is first imported.
os.environ.setdefault("MPLBACKEND", "Agg")
