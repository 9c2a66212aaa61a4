import hashlib
import os

CHUNK_SIZE = 1 << 16


def get_file_hash(path):
    """sha256 hex digest of a file."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def get_dir_hashes(run_dir, exclude=("manifest.json",)):
    """Relative path -> digest for every file below ``run_dir``."""
    hashes = {}
    for root, _, files in os.walk(run_dir):
        for name in sorted(files):
            path = os.path.join(root, name)
            rel = os.path.relpath(path, run_dir).replace(os.sep, "/")
            if rel not in exclude:
                hashes[rel] = get_file_hash(path)
    return dict(sorted(hashes.items()))
