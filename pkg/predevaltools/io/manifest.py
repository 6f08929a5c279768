import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from predevaltools.core.exceptions import DataError
from predevaltools.core.interfaces.io.reader import Reader, ReaderOptions
from predevaltools.core.interfaces.io.writer import Writer, WriterOptions
from predevaltools.core.types import Manifest, ManifestEntry

REQUIRED_KEYS = ('model_id', 'dataset_id', 'predictions_path')
OPTIONAL_PATH_KEYS = ('logits_path', 'labels_path', 'val_predictions_path', 'val_labels_path')


class JSONManifestReader(Reader[Manifest]):
    """
    Reads a study manifest.

    Relative paths inside the manifest are resolved against the manifest's own directory,
    so a suite directory can be moved as a whole.
    """

    def _resolve(self, base: Path, value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        candidate = Path(value)
        return candidate if candidate.is_absolute() else base / candidate

    def _parse_entry(self, raw: Any, index: int, base: Path, path: Path) -> ManifestEntry:
        if not isinstance(raw, dict):
            raise DataError(f'entry {index} is not an object', path)

        missing = [key for key in REQUIRED_KEYS if not raw.get(key)]
        if missing:
            raise DataError(f'entry {index} is missing {", ".join(missing)}', path)

        unknown = set(raw) - set(REQUIRED_KEYS) - set(OPTIONAL_PATH_KEYS)
        if unknown:
            raise DataError(f'entry {index} has unknown keys {sorted(unknown)}', path)

        return ManifestEntry(
            model_id=str(raw['model_id']),
            dataset_id=str(raw['dataset_id']),
            predictions_path=self._resolve(base, raw['predictions_path']),  # type: ignore
            **{key: self._resolve(base, raw.get(key)) for key in OPTIONAL_PATH_KEYS}
        )

    def read(self, path: str, reader_options: ReaderOptions = {}) -> Manifest:
        manifest_path = Path(path)
        encoding = reader_options.get('encoding') or 'utf-8'

        try:
            document = json.loads(manifest_path.read_text(encoding=encoding))
        except FileNotFoundError as e:
            raise DataError('file not found', manifest_path) from e
        except json.JSONDecodeError as e:
            raise DataError(f'invalid JSON: {e.msg}', manifest_path, e.lineno) from e

        if not isinstance(document, dict) or not isinstance(document.get('entries'), list):
            raise DataError('manifest must be an object with an "entries" list', manifest_path)

        base = manifest_path.parent
        entries = [self._parse_entry(raw, i, base, manifest_path) for i, raw in enumerate(document['entries'])]

        try:
            return Manifest(mode=document.get('mode'), entries=entries)  # type: ignore
        except DataError as e:
            raise DataError(e.message, manifest_path) from e


class JSONManifestWriter(Writer[Manifest]):
    """Writes a manifest with paths relative to the manifest's directory where possible."""

    def _relative(self, value: Optional[Path], base: Path) -> Optional[str]:
        if value is None:
            return None
        try:
            return Path(os.path.relpath(value, base)).as_posix()
        except ValueError:
            # different drive on Windows
            return Path(value).as_posix()

    def write(self, data: Manifest, path: str, writer_options: WriterOptions = {}) -> None:
        target = Path(path)
        base = target.parent
        entries = []
        for entry in data.entries:
            record: Dict[str, Any] = {
                'model_id': entry.model_id,
                'dataset_id': entry.dataset_id,
                'predictions_path': self._relative(entry.predictions_path, base),
            }
            for key in OPTIONAL_PATH_KEYS:
                value = self._relative(getattr(entry, key), base)
                if value is not None:
                    record[key] = value
            entries.append(record)

        try:
            base.mkdir(parents=True, exist_ok=True)
            target.write_text(
                json.dumps({'mode': data.mode, 'entries': entries}, indent=2) + '\n',
                encoding=writer_options.get('encoding') or 'utf-8'
            )
        except OSError as e:
            raise DataError(f'cannot write manifest: {e}', target) from e
