from .snapshots import OutputStore

__all__ = ["OutputStore"]
