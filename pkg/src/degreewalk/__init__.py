"""Degree-proportional random-walk scheduling for node embeddings.

Walk budgets can be fixed per node or proportional to node degree; the
degree-proportional schedule spends the budget where connectivity is, which
cuts the total walk count on heavy-tailed graphs while sampling hubs harder.
The package covers the whole pipeline: graph loading, biased second-order
walks, skip-gram training, power-law budget analysis, node-classification
and link-prediction evaluation, and a benchmark harness.
"""

from .graph import (DegreewalkError, Graph, GraphFormatError, karate_club,
                    largest_connected_component, load_edge_list, load_labels)
from .walks import (DegreeBased, Fixed, TransitionModel, WalkConfig,
                    WalkCorpus, build_transition_model, generate_corpus,
                    generate_walk, load_corpus, total_walk_count, walk_count)
from .embedding import (EmbeddingMatrix, TrainConfig, Vocabulary, build_vocab,
                        generate_pairs, load_word2vec, save_word2vec,
                        sgns_step, train)
from .scalefree import (ScaleFreeParams, asymptotic_avg_degree, degree_pdf,
                        expected_avg_degree, expected_max_degree,
                        predicted_total_walks)
from .evaluation import (EvalReport, LinkSplit, classify_nodes,
                         cosine_similarity, edge_features, kmeans,
                         make_link_split, most_similar, predict_links,
                         reduce_2d)

__version__ = "0.1.0"
