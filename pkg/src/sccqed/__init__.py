"""Strong-coupling cavity QED: dressed states, cat-basis reduction and RWA gates."""
__version__ = "0.1.0"
