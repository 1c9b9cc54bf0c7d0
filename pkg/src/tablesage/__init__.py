"""tablesage: similarity search over tables extracted from report documents.

The package ingests HTML-converted reports, learns word embeddings and an
LSTM table classifier, and serves table/row similarity queries, numeric
filters, and a 2-d projection through a CLI and a read-only HTTP API.
"""

__version__ = "0.1.0"
