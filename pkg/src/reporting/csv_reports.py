"""
CSV/JSON artifact emission with metadata sidecars and a hashed manifest
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def ensure_output_directory(out_dir):
    """Ensure the output directory exists"""
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    return out_dir


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_json(obj, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(obj, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write('\n')
    return path


@dataclass
class ExperimentManifest:
    """Registry of everything one command wrote, with content hashes"""
    command: str
    config_path: str
    seeds: list
    out_dir: str
    config: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def register(self, path):
        name = os.path.relpath(path, self.out_dir)
        self.files[name] = file_sha256(path)
        logger.debug("registered %s (%s)", name, self.files[name][:12])
        return path

    def _sidecar(self, path, extra):
        meta = {
            'command': self.command,
            'config_path': self.config_path,
            'seeds': self.seeds,
            'config': self.config
        }
        meta.update(extra or {})
        self.register(dump_json(meta, f"{path}.meta.json"))

    def write_csv(self, df, filename, metadata=None):
        """Write a DataFrame without index, plus its sidecar; both are hashed"""
        path = os.path.join(ensure_output_directory(self.out_dir), filename)
        df.to_csv(path, index=False)
        self.register(path)
        self._sidecar(path, dict(metadata or {}, columns=list(df.columns)))
        logger.info("wrote %s (%d rows)", path, len(df))
        return path

    def write_json(self, obj, filename, metadata=None):
        path = os.path.join(ensure_output_directory(self.out_dir), filename)
        self.register(dump_json(obj, path))
        self._sidecar(path, metadata)
        logger.info("wrote %s", path)
        return path

    def write_file(self, path):
        """Register a file some other writer produced inside out_dir"""
        return self.register(path)

    def to_dict(self):
        return {
            'command': self.command,
            'config_path': self.config_path,
            'seeds': self.seeds,
            'out_dir': self.out_dir,
            'files': dict(sorted(self.files.items()))
        }

    def save(self):
        path = os.path.join(ensure_output_directory(self.out_dir), MANIFEST_NAME)
        return dump_json(self.to_dict(), path)


def load_manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST_NAME), 'r', encoding='utf-8') as handle:
        return json.load(handle)


def verify_manifest(out_dir):
    """Names of registered files whose current hash differs from the recorded one"""
    manifest = load_manifest(out_dir)
    return [
        name for name, digest in manifest['files'].items()
        if not os.path.exists(os.path.join(out_dir, name)) or file_sha256(os.path.join(out_dir, name)) != digest
    ]
