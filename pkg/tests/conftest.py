import os

# keep test runs from writing daily log files
os.environ.setdefault("YARD_LOG_TO_FILE", "false")
os.environ.setdefault("YARD_LOG_LEVEL", "WARNING")

import pytest

from core.config import DEFAULT_SERVICE_TIMES, ServiceDistribution
from core.yard import StationKind, parse_layout

ROW_YARD = """\
#CIWLP#
EciwlpX
"""

TWO_LANE_YARD = """\
#CCIIWWLLPP#
#c.i.w.l.p.#
E..........X
"""


@pytest.fixture
def row_layout():
    """One road row, one berth per station, gates in loop order"""
    return parse_layout(ROW_YARD, name="row")


@pytest.fixture
def two_lane_layout():
    return parse_layout(TWO_LANE_YARD, name="two_lane")


@pytest.fixture
def fixed_service():
    """Table means with zero spread"""
    return {kind: ServiceDistribution(mean_s=d.mean_s, sd_s=0.0) for kind, d in DEFAULT_SERVICE_TIMES.items()}


@pytest.fixture
def all_kinds():
    return list(StationKind)
