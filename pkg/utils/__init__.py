# Numerical and io helpers
