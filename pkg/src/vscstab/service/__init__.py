from .app import app, build_app

__all__ = ["app", "build_app"]
