import hashlib
import io
import json
import os

from django.conf import settings


settings.SELGEN_MAX_LEN = getattr(settings, 'SELGEN_MAX_LEN', 256)
settings.SELGEN_MAX_QUESTION_LEN = getattr(
    settings, 'SELGEN_MAX_QUESTION_LEN', 32)
settings.SELGEN_VOCAB_SIZE = getattr(settings, 'SELGEN_VOCAB_SIZE', 30000)
settings.SELGEN_MIN_FREQ = getattr(settings, 'SELGEN_MIN_FREQ', 1)
settings.SELGEN_TOP_K = getattr(settings, 'SELGEN_TOP_K', 4)
settings.SELGEN_LAMBDA = getattr(settings, 'SELGEN_LAMBDA', 0.5)
settings.SELGEN_BEAM_SIZE = getattr(settings, 'SELGEN_BEAM_SIZE', 5)
settings.SELGEN_LENGTH_ALPHA = getattr(settings, 'SELGEN_LENGTH_ALPHA', 0.7)
settings.SELGEN_OUTPUT_DIR = getattr(settings, 'SELGEN_OUTPUT_DIR', 'runs')
settings.SELGEN_RECORD_RUNS = getattr(settings, 'SELGEN_RECORD_RUNS', True)
settings.SELGEN_SEED = getattr(settings, 'SELGEN_SEED', 13)
settings.SELGEN_EMBEDDING_DIM = getattr(settings, 'SELGEN_EMBEDDING_DIM', 64)
EMBEDDING_TABLE_KEY = 'embedding:table:%s:%s'


def canonical_json(obj):
    """Stable serialization used for hashing configs and reports."""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'),
                      ensure_ascii=False)


def config_hash(obj):
    return hashlib.sha256(
        canonical_json(obj).encode('utf-8')).hexdigest()[:12]


def file_hash(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def write_jsonl(path, records):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False))
            f.write('\n')


def read_jsonl(path):
    with io.open(path, 'r', encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


def write_json(path, obj):
    with io.open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write('\n')


def ensure_dir(path):
    if not os.path.isdir(path):
        os.makedirs(path)
    return path
