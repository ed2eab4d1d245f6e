"""Fleet scheduling for battery-limited aerial vehicles with flight-level separation."""
__version__ = "0.1.0"
