"""Scorers that turn dlama prompt files into prediction files.

Two probing modes: ranking a candidate set under a masked language model
(cloze prompts), and querying a chat-completion service with question
prompts. Both talk to the curation toolkit only through its documented
JSONL file formats.
"""

__version__ = "0.1.0"
