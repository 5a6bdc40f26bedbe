# Test package for ramanmag
