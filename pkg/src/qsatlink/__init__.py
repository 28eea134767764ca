"""LEO satellite quantum downlink simulator."""
