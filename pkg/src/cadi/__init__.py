"""Class Angular Distortion Index: cluster-level projection quality via internal angles."""

from .angular import (CadiScore, ClassPairBreakdown, adi_exact, adi_sampled, cadi,
                      cadi_exact, cadi_on_triplets, cadi_sampled, stability_study)
from .baseline import ari, cluster_distance_score, davies_bouldin, nmi, silhouette, spearman
from .data import (Dataset, MetricResult, Partition, Projection, load_dataset,
                   load_projection, partition_from_labels, save_dataset, save_projection)
from .embed import TrainConfig, angle_embedding, pca_project, random_project
from .sampling import TripletBudget
from .synthetic import GENERATORS, generate

__version__ = "0.1.0"
