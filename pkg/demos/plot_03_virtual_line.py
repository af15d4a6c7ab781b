"""
Controllers on pairs without a line
===================================

The controller graph can be larger than the physical one.  Adding a lag
between buses 2 and 3 (no line there) changes only the controller
incidence.  We compare the slowest closed-loop mode with and without it.
"""
import json

from nigrid import cmd_verify, parse_config
from nigrid.scenario import REFERENCE_SCENARIO_JSON

base = json.loads(REFERENCE_SCENARIO_JSON)
extra = json.loads(REFERENCE_SCENARIO_JSON)
extra["controllers"].append({"from": 2, "to": 3, "k": 0.5, "tau": 10.0, "virtual": True})

for name, data in (("physical only", base), ("with virtual 2-3", extra)):
    r = cmd_verify(parse_config(json.dumps(data)))
    print(f"{name:18s} edges={len(data['controllers'])}  value={r.theorem1['value']:.4f}  "
          f"slowest Re={r.closed_loop['max_real']:+.5f}  certified={r.certified}")

# leaving out the flag is a configuration error
extra["controllers"][-1].pop("virtual")
try:
    parse_config(json.dumps(extra))
except ValueError as exc:
    print("rejected:", exc)
