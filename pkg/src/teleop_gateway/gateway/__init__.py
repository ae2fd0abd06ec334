from .app import Gateway, build_gateway, create_app, serve
from .config import GatewayConfig, load_config

__all__ = ["Gateway", "GatewayConfig", "build_gateway", "create_app", "load_config", "serve"]
