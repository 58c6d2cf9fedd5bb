# System / smoke tests
