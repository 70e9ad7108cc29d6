"""Real-time expressive virtual-agent call server.

Speech or text goes in; an emotion-tagged reply comes back as synthesized
voice plus a synchronized blendshape animation track, streamed to the
browser over a WebSocket wire protocol. Sessions are time-limited,
moderated, and leave nothing behind when they end.
"""

__version__ = "0.1.0"
