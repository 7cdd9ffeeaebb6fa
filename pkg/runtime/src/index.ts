export {
  Archive,
  ArchiveFormatError,
  ParamBlock,
  archiveBytes,
  readArchive,
  readArchiveBytes,
  writeArchive,
} from "./archive.js";
export { BridgeSession, decodeRequest, errFrame, okFrame, serve } from "./bridge.js";
export {
  BadCell,
  Dataset,
  DatasetError,
  EmptyDataset,
  LoadSpec,
  MissingColumn,
  loadCsv,
} from "./dataset.js";
export { KvMap, KvParseError, Token, parseKv, renderKvInline } from "./kvtext.js";
export {
  Activation,
  Gradients,
  Loss,
  MlpModel,
  NumericOverflow,
  ShapeMismatch,
  argmax,
  initModel,
  lossAndGradients,
  predict,
  softmax,
  zeroGradients,
} from "./mlp.js";
export {
  OptimizerConfig,
  OptimizerKind,
  OptimizerState,
  gradList,
  initOptimizer,
  paramList,
  step,
} from "./optim.js";
export {
  PlanStep,
  TransformRecord,
  UnknownColumn,
  applyTransform,
  fitAndApply,
  identityTransform,
  oneHot,
} from "./preprocess.js";
export { Rng } from "./rng.js";
export {
  DecodedPlan,
  LoadedModel,
  TrainSummary,
  TrainingError,
  archiveToModel,
  decodePlan,
  modelToArchive,
  recordPrediction,
  runTrainingPlan,
  runTrainingPlanFile,
  trainFromPlan,
} from "./train.js";
