"""
App/management/commands/predict.py

Classify one image and print the hierarchical prediction as JSON.

Usage:
    python manage.py predict --model runs/model --image scan.png
    python manage.py predict --model runs/model --image scan.png --T 100 --mode hard --seed 1
"""
import json
import logging

from App.data.imaging import load_tensor
from App.hierarchy.model import load_model
from App.hierarchy.predict import predict

from ._common import SubtypeLabCommand, model_dir

logger = logging.getLogger(__name__)


class Command(SubtypeLabCommand):
    help = 'Predict the subtype of one image (JSON on stdout)'
    stage_name = 'predict'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--model', type=str, help='Model directory (default <out>/model)')
        parser.add_argument('--image', type=str, required=True, help='PNG/PGM image to classify')
        parser.add_argument('--T', type=int, help='Monte-Carlo passes')
        parser.add_argument('--mode', choices=['soft', 'hard'], help='Stage routing mode')

    def run(self, **options):
        config = self.load_config(options)
        model = load_model(model_dir(config, options))
        x = load_tensor(options['image'], model.target_size)
        prediction = predict(model, x, config.mc_config(), config.inference['mode'])

        result = prediction.to_dict()
        result['image'] = options['image']
        self.stdout.write(json.dumps(result, indent=2))
        logger.info("Predicted %s for %s (composed entropy %.4f)",
                    prediction.predicted_label.value, options['image'], prediction.composed_entropy)
