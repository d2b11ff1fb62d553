from django.urls import include, path
from rest_framework.routers import DefaultRouter

from . import views

router = DefaultRouter()
router.register('experiments', views.ExperimentViewSet)
router.register('results', views.ExperimentResultViewSet)

urlpatterns = [
    path('', include(router.urls)),
    path('localize/', views.localize, name='localize'),
    path('cost/', views.cost, name='cost'),
]
