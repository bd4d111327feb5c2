# Parity-problem simulator package
