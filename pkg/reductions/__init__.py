# Reductions package
