"""Serialization of manifests, reports and circuits. Formats are built as pipelines of stages: a
``cattrs`` stage that unstructures models into builtin types, then a format-specific stage.
"""
# flake8: noqa: F401
from .cattrs import CattrStage, init_converter
from .circuit_text import circuit_serializer
from .pipeline import SerializerPipeline, Stage
from .preconf import dict_serializer, json_serializer, toml_serializer, yaml_serializer

__all__ = [
    'SERIALIZERS',
    'CattrStage',
    'SerializerPipeline',
    'Stage',
    'circuit_serializer',
    'dict_serializer',
    'init_converter',
    'init_serializer',
    'json_serializer',
    'toml_serializer',
    'yaml_serializer',
]

SERIALIZERS = {
    'circuit': circuit_serializer,
    'json': json_serializer,
    'toml': toml_serializer,
    'yaml': yaml_serializer,
}


def init_serializer(serializer=None):
    """Initialize a serializer from a name or instance"""
    serializer = serializer or 'json'
    if isinstance(serializer, str):
        try:
            serializer = SERIALIZERS[serializer.lower()]
        except KeyError:
            raise ValueError(f'Invalid serializer: {serializer}. Choose from: {list(SERIALIZERS)}')
    return serializer
