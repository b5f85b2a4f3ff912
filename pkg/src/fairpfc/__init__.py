"""Group fairness metrics, aggregation and performance-fairness trade-off tools."""

from fairpfc.aggregation import (AggregationOutcome, AggregationSpec, BasicUnit, ClassAggregation,
                                 ClassMethod, DecisionAnswers, Direction, GroupForm, UnitKind,
                                 aggregate, class_aggregate, generalized_mean, group_aggregate,
                                 normalize, preset, recommend, unit_transform)
from fairpfc.dataset_io import (DatasetSchema, GroupedConfusions, PredictionRecord, Split,
                                export_confusions, export_records, parse_confusions,
                                parse_records, parse_schema)
from fairpfc.errors import (FairPFCError, InfeasibleSelectionError, InputError, InvariantError,
                            ParseError, UndefinedMetricError)
from fairpfc.group_metrics import (BaseMetricKind, MeanMode, MetricMatrix, confusions_from_records,
                                   metric_matrix, overall_accuracy)
from fairpfc.selection import (CandidateRun, ComparisonTable, SelectionCriterion, compare_methods,
                               group_by_config, select, standard_criteria)
from fairpfc.tradeoff import (AucMode, Frontier, TradeoffPoint, UtopiaPoint, auc_pfc, dto,
                              max_dto, min_fairness, min_performance, pareto_frontier,
                              partial_auc_pfc, polar_dto_area)

__version__ = "0.1.0"
