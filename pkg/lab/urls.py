from django.urls import path, include
from rest_framework.routers import DefaultRouter
from . import views

app_name = 'lab'

# API Router
router = DefaultRouter()
router.register(r'experiments', views.ExperimentRunViewSet, basename='experiment')
router.register(r'learner-runs', views.LearnerRunViewSet, basename='learner-run')

urlpatterns = [
    # Read-only registry of recorded experiments
    path('api/', include(router.urls)),
]
