from .app import apply_edit_op, create_app

__all__ = ["apply_edit_op", "create_app"]
