VERSION = "0.1"

# If you modify this, do not forget to modify the version in docs/installation.md
