# Tests package for otslab
