"""Integer-coordinate intrinsic triangulations."""
