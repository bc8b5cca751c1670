"""SNMP-MIB interface-counter anomaly detection: ranking, classifiers, evaluation, live collection."""

__version__ = "0.1.0"
