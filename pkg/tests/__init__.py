"""metricwalk test suite."""
