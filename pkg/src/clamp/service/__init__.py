from .app import create_app, create_app_from_paths

__all__ = ["create_app", "create_app_from_paths"]
