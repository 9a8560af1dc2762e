"""
Replaying certificates
======================

Every certified statement carries the constants it used. Replay re-runs
only the final inequality from those constants, so a stored certificate can
be checked without recomputing any spectral data, and tampering is caught.
"""

import json

from spinflow.certificates import Certificate, replay
from spinflow.pipeline import certify_structure
from spinflow.synthetic import planted_instance

sp, _ = planted_instance(4, 2)
res = certify_structure(sp, 0)
doc = json.dumps(res.to_json())
print(f"{len(res.certificates)} top-level certificates, {len(doc)} bytes of JSON")

certs = [Certificate.from_json(c) for c in json.loads(doc)["certificates"]]
print("all replay:", all(replay(c) for c in certs))

crossing = next(c for c in certs if c.kind == "crossing")
sign = next(c for c in crossing.children if c.kind == "sign")
print("sign certificate constants:", {k: round(float(v), 5) for k, v in sign.constants.items()})
sign.verdict = -sign.verdict
print("after flipping one sign verdict, crossing replays:", replay(crossing))
