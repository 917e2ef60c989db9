import json
import logging
import math
from datetime import datetime

events_logger = logging.getLogger("solver.events")


def json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def log_event(run_id: str, event: str, data: dict):
    """
    log a structured event as one JSON document, for example a finished time step or an aborted run
    :param run_id: run the event belongs to
    :param event: event type
    :param data: event payload
    """
    data_to_log = {
        "solver-lab": True,
        "time": datetime.now().isoformat(),
        "run-id": run_id,
        "event": event,
    }
    data_to_log.update(json_safe(data))
    events_logger.info(json.dumps(data_to_log))


def parse_override(item: str) -> tuple[str, object]:
    """
    Split a "section.key=value" override, the value is parsed as JSON when possible
    """
    if "=" not in item:
        raise ValueError(f"Override must look like key=value, got '{item}'")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ValueError(f"Override without a key: '{item}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value
