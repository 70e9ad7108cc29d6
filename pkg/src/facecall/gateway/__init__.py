"""Network edge: wire protocol, turn pipeline, and the call server."""
