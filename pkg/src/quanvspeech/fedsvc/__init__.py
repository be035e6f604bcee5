"""Split feature extraction: a server that keeps circuit parameters private
and a client that only ever sees encoded features."""

from .client import EncodeRequest, QuanvClient, encode_remote
from .registry import ModelEntry, Registry
from .server import QuanvServer, make_server, serve

__all__ = [
    "EncodeRequest",
    "ModelEntry",
    "QuanvClient",
    "QuanvServer",
    "Registry",
    "encode_remote",
    "make_server",
    "serve",
]
