from .app import build_session, create_app  # noqa: F401
