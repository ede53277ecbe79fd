"""
Local disk storage for instance documents, run records and bench summaries.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import List, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel

from mtsp_cmsa.exceptions import StorageError

SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
RUNS_DIR = "runs"


class LocalStorageService:
    """
    Local disk storage service.

    Documents are written as UTF-8 JSON, one document per file. Paths are
    resolved against ``base_path`` unless absolute.
    """

    def __init__(self, base_path: Union[str, Path] = "."):
        """
        Initialize local storage service.

        Args:
            base_path: Base directory for relative paths
        """
        self.base_path = Path(base_path).resolve()

    def resolve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_path / path

    def ensure_dir(self, path: Union[str, Path]) -> Path:
        """
        Create a directory (and parents) if missing.

        Raises:
            StorageError: If the directory cannot be created
        """
        directory = self.resolve(path)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create directory {directory}: {e}")
        return directory

    def save_text(self, text: str, path: Union[str, Path]) -> Path:
        """
        Write text to a file, creating parent directories.

        Args:
            text: Content
            path: Target file

        Returns:
            Absolute file path

        Raises:
            StorageError: If the target is not writable
        """
        file_path = self.resolve(path)
        self.ensure_dir(file_path.parent)
        try:
            with open(file_path, "w", encoding="utf-8", newline="\n") as dest:
                dest.write(text)
        except OSError as e:
            raise StorageError(f"Cannot write {file_path}: {e}")
        return file_path

    def save_document(self, document: BaseModel, path: Union[str, Path]) -> Path:
        """
        Write a pydantic document as indented JSON.

        Args:
            document: Document to serialize
            path: Target file

        Returns:
            Absolute file path
        """
        return self.save_text(document.model_dump_json(indent=2) + "\n", path)

    def load_json(self, path: Union[str, Path]) -> dict:
        """
        Read a JSON document.

        Raises:
            StorageError: If the file is missing or not valid JSON
        """
        file_path = self.resolve(path)
        try:
            return json.loads(file_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise StorageError(f"Cannot read {file_path}: {e}")

    def save_bench_summary(
        self, summary: pd.DataFrame, out_dir: Union[str, Path]
    ) -> Tuple[Path, Path]:
        """
        Write the bench summary as CSV and JSON.

        Args:
            summary: One row per (instance, m)
            out_dir: Output directory

        Returns:
            (csv path, json path)
        """
        directory = self.ensure_dir(out_dir)
        csv_path = directory / SUMMARY_CSV
        json_path = directory / SUMMARY_JSON
        try:
            summary.to_csv(csv_path, index=False)
        except OSError as e:
            raise StorageError(f"Cannot write {csv_path}: {e}")
        self.save_text(summary.to_json(orient="records", indent=2) + "\n", json_path)
        return csv_path, json_path

    def load_bench_summary(self, out_dir: Union[str, Path]) -> pd.DataFrame:
        csv_path = self.resolve(out_dir) / SUMMARY_CSV
        try:
            return pd.read_csv(csv_path, dtype={"instance": str})
        except (OSError, pd.errors.ParserError) as e:
            raise StorageError(f"Cannot read {csv_path}: {e}")

    @staticmethod
    def compute_sha256(path: Union[str, Path], chunk_size: int = 1024 * 1024) -> str:
        """
        SHA-256 of a file, read in chunks.

        Args:
            path: File to hash
            chunk_size: Read size in bytes

        Returns:
            Hex digest
        """
        sha256_hash = hashlib.sha256()
        with open(path, "rb") as f:
            while True:
                chunk = f.read(chunk_size)
                if not chunk:
                    break
                sha256_hash.update(chunk)
        return sha256_hash.hexdigest()

    def list_files(self, pattern: str) -> List[Path]:
        """Files matching a glob pattern, sorted."""
        if os.path.isabs(pattern):
            root, relative = Path(pattern).anchor, str(Path(pattern).relative_to(Path(pattern).anchor))
            return sorted(p for p in Path(root).glob(relative) if p.is_file())
        return sorted(p for p in self.base_path.glob(pattern) if p.is_file())


# Global storage service instance
_storage_service: Optional[LocalStorageService] = None


def get_storage_service() -> LocalStorageService:
    """
    Get or create storage service instance.

    Returns:
        LocalStorageService instance
    """
    global _storage_service
    if _storage_service is None:
        base_path = os.getenv("MTSP_STORAGE_BASE_PATH", ".")
        _storage_service = LocalStorageService(base_path=base_path)
    return _storage_service
