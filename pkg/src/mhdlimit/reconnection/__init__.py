"""Reconnection experiments: Beltrami data, null points, magnetic lines and Alfvén transport."""
from .alfven import AlfvenResult, FlowMapTracker, alfven_transport_check
from .beltrami import BeltramiSpec, abc_beltrami
from .data import ReconnectionData, build_reconnection_data, perturbation
from .lines import FieldLine, TracerError, trace_field_line, write_lines_csv
from .nulls import NullPoint, NullScan, find_nulls, scan_nulls, write_null_csv
from .topology import TopologyReport, topology_report

__all__ = [
    "AlfvenResult", "BeltramiSpec", "FieldLine", "FlowMapTracker", "NullPoint", "NullScan",
    "ReconnectionData", "TopologyReport", "TracerError", "abc_beltrami", "alfven_transport_check",
    "build_reconnection_data", "find_nulls", "perturbation", "scan_nulls", "topology_report",
    "trace_field_line", "write_lines_csv", "write_null_csv",
]
