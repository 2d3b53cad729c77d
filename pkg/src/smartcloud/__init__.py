"""Smart Cloud: a desk-scale cloud offloading gateway for robots.

Subsystems: a rosbridge-style JSON websocket protocol (`protocol`), a
capability registry (`registry`), offloadable applications (`apps`), an XML
web-service result path (`webservice`), latency/CPU metrics (`metrics`), the
gateway server (`gateway`), and a simulated robot + network harness (`simnet`).
"""

__version__ = "0.1.0"
